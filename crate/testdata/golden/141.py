def exponent(count):
    return pow(count, 10)
