def find(elements, target):
    for position, item in enumerate(elements):
        if item == target:
            return position
    return -1
