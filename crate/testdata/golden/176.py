def divides(amount):
    return not amount % 11
