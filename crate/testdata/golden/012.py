def total(numbers):
    total = 0
    for item in numbers:
        total += item
    return total
