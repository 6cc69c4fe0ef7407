def underscore(text):
    return '_'.join(text.split(' '))
