def exists(mapping, key):
    return mapping.get(key) is not None
