@property
def area(self):
    return self.width * self.height
