def keys_sorted(mapping):
    keys = list(mapping)
    keys.sort()
    return keys
