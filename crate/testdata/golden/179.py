from os.path import join as pjoin

def full(root, name):
    return pjoin(root, name)
