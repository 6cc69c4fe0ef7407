def position(xs, target):
    return xs.index(target)
