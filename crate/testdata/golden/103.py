def exists(d, key):
    return key in d
