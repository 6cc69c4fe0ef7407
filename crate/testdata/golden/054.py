def sum_all(data):
    total = 0
    for item in data:
        total += item
    return total
