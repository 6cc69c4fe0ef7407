def exponent(num):
    return pow(num, 9)
