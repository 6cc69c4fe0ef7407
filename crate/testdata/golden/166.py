def to_string(data):
    return ' '.join(str(item) for item in data)
