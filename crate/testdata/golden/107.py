def index_of(xs, target):
    return xs.index(target)
