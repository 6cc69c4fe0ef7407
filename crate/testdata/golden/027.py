def max_value(elements):
    best = elements[0]
    for item in elements:
        if item > best:
            best = item
    return best
