def invert(registry):
    result = {}
    for key, value in registry.items():
        result[value] = key
    return result
