def absolute(xs):
    return list(map(abs, xs))
