def fetch(lookup, key):
    return lookup.get(key, 11)
