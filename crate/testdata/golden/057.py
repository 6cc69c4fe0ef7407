def swap(d):
    result = {}
    for key, value in d.items():
        result[value] = key
    return result
