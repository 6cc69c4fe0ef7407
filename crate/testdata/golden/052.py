def ordered_keys(index):
    return sorted(index.keys())
