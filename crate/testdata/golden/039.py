def filter_small(data):
    result = []
    for item in data:
        if item < 4:
            result.append(item)
    return result
