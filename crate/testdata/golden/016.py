def above(numbers):
    return [item for item in numbers if item > 16]
