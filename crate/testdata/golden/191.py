def read_all(path):
    with open(path, 'rb') as fh:
        data = fh.read()
    return data
