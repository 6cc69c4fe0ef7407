def repeat(title):
    return ''.join([title] * 4)
