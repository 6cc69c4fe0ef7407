def index_of(numbers, target):
    for position, item in enumerate(numbers):
        if item == target:
            return position
    return -1
