def duplicate(content):
    return ''.join([content] * 16)
