def sorted_keys(registry):
    return sorted(registry.keys())
