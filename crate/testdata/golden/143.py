def invert(counts):
    result = {}
    for key, value in counts.items():
        result[value] = key
    return result
