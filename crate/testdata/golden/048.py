def ordered_keys(counts):
    return sorted(counts.keys())
