def is_empty(data):
    return len(data) == 0
