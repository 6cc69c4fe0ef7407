def consecutive(x):
    return list(range(x, x + 4))
