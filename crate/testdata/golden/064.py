def join_all(elements):
    return ' '.join(str(item) for item in elements)
