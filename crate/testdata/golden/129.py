def front(xs):
    return xs[0]
