def to_string(seq):
    return ' '.join(seq)
