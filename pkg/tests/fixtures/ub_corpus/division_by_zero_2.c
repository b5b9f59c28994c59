int a = 9;
int main() {
  int r = 1;
  r = a % (3 - 3);
  printf("%d\n", r);
  return 0;
}
