def locate(xs, target):
    return xs.index(target)
