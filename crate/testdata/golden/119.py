def has_key(registry, key):
    return key in registry
