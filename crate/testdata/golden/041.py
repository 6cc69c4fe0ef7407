def sorted_keys(counts):
    keys = list(counts)
    keys.sort()
    return keys
