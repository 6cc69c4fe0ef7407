def apply(fn, xs):
    return list(map(lambda x: fn(x) * 2, xs))
