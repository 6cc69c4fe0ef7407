def walrus(items):
    if (n := len(items)) > 10:
        return n
    return -1
