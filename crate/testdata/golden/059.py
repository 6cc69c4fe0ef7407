def contains(d, key):
    return key in d
