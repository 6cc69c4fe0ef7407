def flip(cache):
    return {value: key for key, value in cache.items()}
