def below(seq):
    return [item for item in seq if item < 5]
