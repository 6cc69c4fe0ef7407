def filter_small(data):
    return [item for item in data if item < 15]
