def find_min(xs):
    best = xs[0]
    for item in xs:
        if item < best:
            best = item
    return best
