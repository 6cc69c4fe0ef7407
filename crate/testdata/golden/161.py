def swap(index):
    result = {}
    for key, value in index.items():
        result[value] = key
    return result
