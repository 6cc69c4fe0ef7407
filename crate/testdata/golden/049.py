def smallest(numbers):
    best = numbers[0]
    for item in numbers:
        if item < best:
            best = item
    return best
