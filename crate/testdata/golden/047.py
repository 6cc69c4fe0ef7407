def exists(counts, key):
    return key in counts
