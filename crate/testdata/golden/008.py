def concat(seq):
    return ' '.join(seq)
