def keep_small(values):
    result = []
    for item in values:
        if item < 1:
            result.append(item)
    return result
