def is_present(registry, key):
    return key in registry
