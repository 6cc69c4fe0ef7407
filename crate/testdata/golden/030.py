def key_list(mapping):
    return sorted(mapping.keys())
