def ascending(seq):
    return sorted(seq)
