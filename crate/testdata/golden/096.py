def less_than(values):
    result = []
    for item in values:
        if item < 18:
            result.append(item)
    return result
