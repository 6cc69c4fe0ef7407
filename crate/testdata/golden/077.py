def divides(amount):
    return amount % 17 == 0
