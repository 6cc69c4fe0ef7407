def is_empty(seq):
    return len(seq) == 0
