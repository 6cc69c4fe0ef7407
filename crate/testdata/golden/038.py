def keep_small(seq):
    result = []
    for item in seq:
        if item < 7:
            result.append(item)
    return result
