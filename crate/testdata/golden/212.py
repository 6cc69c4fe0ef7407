def ternary(x):
    return 'pos' if x > 0 else 'neg' if x < 0 else 'zero'
