def filter_small(elements):
    return [item for item in elements if item < 8]
