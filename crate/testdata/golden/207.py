def slices(xs):
    return xs[1:-1], xs[::2], xs[:, 0] if False else xs[-1]
