def is_present(index, key):
    return key in index
