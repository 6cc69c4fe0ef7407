def restrict(total):
    if total < 0:
        return 0
    if total > 13:
        return 13
    return total
