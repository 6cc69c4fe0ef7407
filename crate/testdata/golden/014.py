def less_than(values):
    result = []
    for item in values:
        if item < 8:
            result.append(item)
    return result
