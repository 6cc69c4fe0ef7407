def combine(numbers):
    return ' '.join(numbers)
