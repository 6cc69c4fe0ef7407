def flip(cache):
    result = {}
    for key, value in cache.items():
        result[value] = key
    return result
