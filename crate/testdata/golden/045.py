def sort_values(xs):
    return sorted(xs)
